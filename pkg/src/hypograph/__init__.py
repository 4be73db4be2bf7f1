"""Mine interpretable subgraph -> property hypotheses from labeled graph datasets."""

__version__ = "0.1.0"
