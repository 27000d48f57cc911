"""Shared configuration, logging, error and serialization helpers."""
