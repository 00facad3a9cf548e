# empty: makes tests importable on some runners
