"""Unit tests for services module."""
