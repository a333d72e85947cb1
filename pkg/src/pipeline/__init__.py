"""Batch command-line front end wiring the segmentation pipeline together."""
