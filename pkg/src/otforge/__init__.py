"""otforge: build semantic-parsing corpora over relational databases.

The toolchain samples operation trees from a schema-grounded grammar, compiles
and executes them as SQL to guarantee answerability, and drives a two-phase
annotation workflow (question writing, then token-to-operation assignment)
with corpus analytics on top.
"""

__version__ = "0.1.0"
