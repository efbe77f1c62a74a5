"""Exception hierarchy. Everything raised on bad input derives from ShortSpamError."""


class ShortSpamError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidURLError(ShortSpamError, ValueError):
    pass


class DatasetError(ShortSpamError):
    pass


class InvalidRecordError(ShortSpamError, ValueError):
    pass


class ProviderMissingError(ShortSpamError):
    def __init__(self, provider: str):
        super().__init__(f"no verdict fixture loaded for provider {provider!r}")
        self.provider = provider


class FeatureMismatchError(ShortSpamError, ValueError):
    pass


class TrainingError(ShortSpamError, ValueError):
    pass


class ModelFormatError(ShortSpamError):
    """Model file is truncated, not JSON, or missing fields."""


class ModelVersionError(ModelFormatError):
    pass


class EvaluationError(ShortSpamError, ValueError):
    pass
