"""Test suite for the community mood engine."""
