"""Test suite for smk."""
