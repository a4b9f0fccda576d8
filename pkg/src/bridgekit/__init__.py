"""Referential bridging resolution pipeline: corpus model, prompt
construction, LLM gateway, heuristics, evaluation and error analysis."""

__version__ = "0.1.0"
