"""Exception hierarchy shared by all modules."""


class PATreeError(Exception):
    """Base class for every error raised by the package."""


class InvalidWeight(PATreeError, ValueError):
    pass


class NonConvergent(PATreeError, ArithmeticError):
    pass


class BracketingFailed(PATreeError, ArithmeticError):
    pass


class TreeError(PATreeError, ValueError):
    pass


class MissingRoot(TreeError):
    pass


class MissingParent(TreeError):
    pass


class MissingLeftSibling(TreeError):
    pass


class VertexAbsent(TreeError, KeyError):
    pass


class TooShallow(TreeError):
    pass


class TooLarge(TreeError):
    pass


class InvalidMark(TreeError):
    pass


class Unnormalized(PATreeError, ValueError):
    pass
