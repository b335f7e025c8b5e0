const ctx = document.getElementById("stage").getContext("2d");
badgekit.drawBadge(ctx, { x: 40, y: 40, count: 3 });
