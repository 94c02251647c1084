"""Unit tests for mesh modules."""
