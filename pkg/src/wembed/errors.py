"""Exception types raised across the package."""


class DimensionMismatchError(ValueError):
    def __init__(self, dim_a, dim_b):
        super().__init__(f"ground dimensions differ: first cloud has k={dim_a}, second has k={dim_b}")
        self.dim_a = dim_a
        self.dim_b = dim_b


class NumericalInstabilityError(FloatingPointError):
    """Kernel under/overflow in the plain multiplicative Sinkhorn updates."""


class UnsupportedInstanceError(ValueError):
    pass


class DisconnectedGraphError(ValueError):
    def __init__(self, u, v):
        super().__init__(f"graph is disconnected: vertex {v} is unreachable from vertex {u}")
        self.pair = (u, v)


class EdgeListParseError(ValueError):
    def __init__(self, lineno, line, reason="expected two integer vertex ids"):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class TrainingDivergedError(RuntimeError):
    pass


class OutOfVocabularyError(KeyError):
    def __init__(self, word, hints=()):
        msg = f"{word!r} is not in the vocabulary"
        if hints:
            msg += "; did you mean: " + ", ".join(hints)
        super().__init__(msg)
        self.word = word
        self.hints = list(hints)

    def __str__(self):
        return self.args[0]
