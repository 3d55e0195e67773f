"""Tests for affordance-words."""
