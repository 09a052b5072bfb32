# Agent model tests
