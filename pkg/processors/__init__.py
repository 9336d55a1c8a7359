# Manifest and report processors package