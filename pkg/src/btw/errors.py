"""Exception hierarchy shared across the package."""


class BtwError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(BtwError):
    """A caller-supplied value violates a documented precondition."""


class InternalError(BtwError):
    """An internal contract was violated; indicates a bug, not bad input."""


class LayoutError(BtwError):
    """A layout document failed validation.

    ``path`` points at the offending field, e.g. ``panels[1].id``.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.reason = message


class NavigationError(BtwError):
    """The bridge could not navigate to the requested URL."""


class SelectorNotFoundError(BtwError):
    """A selector matched no element (or only a zero-area one)."""


class CaptureConflictError(BtwError):
    """start_capture was called while a capture is already active."""


class InjectionRejectedError(BtwError):
    """An injection target lies outside the current viewport."""


class ResolutionError(BtwError):
    """A layout panel's selector could not be resolved against the page."""

    def __init__(self, panel_id: str, message: str):
        super().__init__(f"panel '{panel_id}': {message}")
        self.panel_id = panel_id


class DecodeError(BtwError):
    """A wire message could not be decoded.

    ``offset`` is the byte position where parsing failed, when known.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ProtocolError(BtwError):
    """A well-formed message violated session rules (version, sequencing)."""


class UnknownPanelError(BtwError):
    """An input or transform referenced a panel id not in the layout."""


class ReplayScriptError(BtwError):
    """A replay script failed validation; message carries the field path."""


class OutOfViewportError(BtwError):
    """Input target not visible and auto-scroll is disabled."""
