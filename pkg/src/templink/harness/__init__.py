"""Configuration, end-to-end pipeline, synthetic benchmark and CLI."""
