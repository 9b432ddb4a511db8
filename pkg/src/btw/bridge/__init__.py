from .base import Bitmap, BrowserBridge, CaptureStream, InjectedEvent, PageHandle, SourceFrame
from .mock import MockBridge

__all__ = [
    "Bitmap",
    "BrowserBridge",
    "CaptureStream",
    "InjectedEvent",
    "MockBridge",
    "PageHandle",
    "SourceFrame",
]
