"""Graph and retrieval augmented generation engine.

Submodules map onto the pipeline stages: corpus preprocessing, chunking
and embedding, vector indexing, knowledge-graph construction, multimodal
input adapters, the retrieval engine, instruction-record forging, the
MCQ evaluation bench, and the CLI/HTTP gateway.
"""

__version__ = "0.1.0"
