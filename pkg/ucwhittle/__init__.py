"""
UCWhittle: optimistic Whittle-index learning for restless multi-armed bandits
"""

__version__ = "0.1.0"
