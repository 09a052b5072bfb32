# Harness tests
