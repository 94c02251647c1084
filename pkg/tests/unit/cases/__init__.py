"""Unit tests for the benchmark cases."""
