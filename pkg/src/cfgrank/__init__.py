"""cfgrank: control-flow-graph analysis and malware classification toolkit."""

__version__ = "0.1.0"
