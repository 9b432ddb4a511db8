"""btw: break a live webpage into synchronized, independently placed panels.

A server mirrors one browser page into multiple cropped panel streams,
relays panel-local input back into the page, and manages workspace
placement semantics (surface snapping, touch/ray mode selection) for
connected clients.
"""

__version__ = "0.1.0"

from .errors import BtwError

__all__ = ["BtwError", "__version__"]
