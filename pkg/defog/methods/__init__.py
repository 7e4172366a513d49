"""Defogging methods selectable by name."""
