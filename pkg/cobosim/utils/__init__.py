"""Utility functions for cobosim."""
