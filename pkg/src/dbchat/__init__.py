"""dbchat: natural-language data interaction over agents, workflows, and SQL."""

__version__ = "0.1.0"
