"""Tests for calibration_workbench."""
