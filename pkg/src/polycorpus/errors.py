"""Exception hierarchy shared by every module.

All domain failures derive from :class:`CorpusError`; the CLI maps those to
exit status 1 and everything else (argparse) to 2.
"""


class CorpusError(Exception):
    """Base class for domain errors."""


class IoError(CorpusError):
    pass


class FormatError(CorpusError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class EncodingError(FormatError):
    pass


class EmptyInputError(CorpusError):
    pass


class EmptyPoolError(CorpusError):
    pass


class InsufficientPoolError(CorpusError):
    pass


class InsufficientCandidatesError(CorpusError):
    pass


class DuplicateTokenError(CorpusError):
    pass


class ProviderError(CorpusError):
    def __init__(self, message, index=None, stage=None):
        prefix = f"[{stage}] " if stage else ""
        suffix = f" (sentence {index})" if index is not None else ""
        super().__init__(prefix + message + suffix)
        self.index = index
        self.stage = stage


class UnknownPairError(CorpusError):
    pass


class ZeroVectorError(CorpusError):
    pass


class DimensionMismatchError(CorpusError):
    pass


class ShapeMismatchError(DimensionMismatchError):
    pass


class LengthMismatchError(CorpusError):
    pass


class DegenerateError(CorpusError):
    pass


class EmptySampleError(CorpusError):
    pass


class EmptyCorpusError(CorpusError):
    pass


class EmptyInstructionError(CorpusError):
    pass


class UnknownLanguageNameError(CorpusError):
    pass


class TemplateIndexError(CorpusError):
    pass
