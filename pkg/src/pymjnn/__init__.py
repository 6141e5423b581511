from pymjnn.designer import Designer
from pymjnn.settings import Settings

__all__ = ["Designer", "Settings"]
