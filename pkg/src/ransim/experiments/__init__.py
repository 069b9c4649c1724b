"""Drivers for the packaged experiments (one module per figure or scenario)."""
