"""File formats: JSONL, notes, PathSets, tensor bundles and run reports."""
