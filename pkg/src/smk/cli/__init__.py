"""Command-line front end: configuration, task dispatch and output writers."""
