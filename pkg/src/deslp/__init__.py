"""Logic-programming workbench for round-reduced DES.

Encodes the cipher as ground normal logic programs under the stable model
semantics, solves them with a dedicated lookahead solver, and benchmarks
known-plaintext key search on the resulting instances.
"""

__version__ = "0.1.0"
