"""Tests for DATOS Lab."""
