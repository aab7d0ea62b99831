"""Learn rewrites from query modifiers to product attribute values.

Pipeline: browse trails -> token/domain counts -> conditional distributions
-> modifier ranking -> modifier/AV-pair association scores -> coverage-ranked
AV sets mined from the product catalog -> rewritten queries.
"""

__version__ = "0.1.0"
