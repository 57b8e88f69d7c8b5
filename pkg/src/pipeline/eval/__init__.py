"""Scoring, oracle verification and the lexical baseline judge."""
