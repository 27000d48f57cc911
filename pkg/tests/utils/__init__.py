"""Centralized test utilities and shared fixtures."""