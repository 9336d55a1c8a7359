# Verification services package