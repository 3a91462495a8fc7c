"""Experiment harness: CLI, IO, seeding, featurization, prebuilt suites."""
