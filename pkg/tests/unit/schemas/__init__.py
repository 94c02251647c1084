"""Tests for schema modules."""
