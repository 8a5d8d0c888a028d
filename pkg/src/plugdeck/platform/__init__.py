from .core import PlatformCore, PluginInstance, PluginRef, Session
from .storage import EventLog

__all__ = ["PlatformCore", "PluginInstance", "PluginRef", "Session", "EventLog"]
