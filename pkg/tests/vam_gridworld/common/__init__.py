# Common helper tests
