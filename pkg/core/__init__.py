# Double-form algebra, curvature invariants and metric catalog package