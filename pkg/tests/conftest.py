"""Keeps the tests directory on sys.path so the helper modules import."""
