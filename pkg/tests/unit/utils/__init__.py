"""Unit tests for utilities module."""
