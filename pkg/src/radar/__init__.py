# Radar model package
