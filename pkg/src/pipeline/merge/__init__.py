"""Parameter-space model merging."""
