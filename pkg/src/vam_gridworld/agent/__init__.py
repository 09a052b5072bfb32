# Cross-modal agent: view-action matching, action-type gate, ablation rows
