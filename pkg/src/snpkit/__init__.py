"""Decision tooling for containment of guarded monotone SNP sentences."""

__version__ = "0.1.0"
