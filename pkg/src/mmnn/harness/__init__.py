"""Experiment orchestration: configs, registry, runs, reports and the CLI."""
