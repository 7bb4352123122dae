"""cmtwist: two-path central L-value verification for CM elliptic curve twists."""

__version__ = "0.1.0"
