# Shared errors, configuration and value parsing
