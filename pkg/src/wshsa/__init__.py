"""Key-rate analysis, scheme synthesis and exact security verification for
weakly-secure hierarchical secure aggregation."""

__version__ = "0.1.0"
