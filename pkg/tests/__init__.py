"""Unit test package for sparsemodes."""
