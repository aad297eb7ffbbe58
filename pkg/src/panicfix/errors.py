"""Exception hierarchy. Every error carries the pipeline stage that raised it."""


class PanicFixError(Exception):
    module = "panicfix"

    def diagnostic(self) -> str:
        return f"{self.module}: {type(self).__name__}: {self}"


class MalformedBacktrace(PanicFixError):
    module = "panic-report"


class NoProjectLocation(PanicFixError):
    module = "panic-report"


class EmptyProject(PanicFixError):
    module = "source-model"


class UnknownFile(PanicFixError):
    module = "source-model"


class InvalidLambda(PanicFixError, ValueError):
    module = "localization"


class InvalidDepth(PanicFixError, ValueError):
    module = "localization"


class CatalogSchemaError(PanicFixError):
    module = "pattern-catalog"

    def __init__(self, message, entry=None):
        super().__init__(message if entry is None else f"{entry}: {message}")
        self.entry = entry


class UnsynthesizableBinding(PanicFixError):
    module = "patch-engine"


class OverlappingEdits(PanicFixError):
    module = "patch-engine"


class SyntacticallyInvalid(PanicFixError):
    module = "patch-engine"


class MissingSlot(PanicFixError, KeyError):
    module = "patch-engine"

    def __str__(self):
        return Exception.__str__(self)


class ToolchainUnavailable(PanicFixError):
    module = "validation"


class TriggerDoesNotPanic(PanicFixError):
    module = "validation"


class MalformedDiff(PanicFixError):
    module = "cli"
