"""Unit tests for numerics modules."""
