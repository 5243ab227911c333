# orbires package init
