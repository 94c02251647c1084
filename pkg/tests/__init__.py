"""Tests for dgsem-amr package."""
