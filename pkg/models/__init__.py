# Manifest and report models package