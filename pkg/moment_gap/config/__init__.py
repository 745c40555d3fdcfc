from .settings import Settings, configure, get_settings, load_overlay, reset_settings

__all__ = ["Settings", "configure", "get_settings", "load_overlay", "reset_settings"]
