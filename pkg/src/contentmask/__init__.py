"""Word-level content masking for speech, with ASR/ASV impact evaluation."""

__version__ = "0.1.0"
