"""Unit tests for the wavepax experiment library."""
